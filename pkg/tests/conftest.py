import pytest

from blockforge.kb import ApiSpec, ParameterSpec, ValueRange


def _p(name, dtype, **kw):
    return ParameterSpec(name=name, dtype=dtype, **kw)


def toy_kb():
    """Small in-memory knowledge base for a fictional 'toylib' target."""
    specs = [
        ApiSpec(
            name="toylib.layers.Input",
            definition="input layer holding the sample shape",
            init_snippet="toylib.layers.Input(shape=(8,))",
            parameters=(_p("shape", "tensor-shape", structure="tuple"),),
        ),
        ApiSpec(
            name="toylib.layers.Dense",
            definition="fully connected layer",
            init_snippet="toylib.layers.Dense(units=16)",
            parameters=(
                _p("units", "int", range=ValueRange(low=1), default=16,
                   has_default=True),
                _p("activation", "enum", enum_values=("relu", "tanh", "None"),
                   default="relu", has_default=True),
                _p("use_bias", "boolean", default=True, has_default=True),
            ),
            similarity=(
                ("toylib.layers.Gate", 0.6),
                ("toylib.layers.Mix", 0.4),
            ),
        ),
        ApiSpec(
            name="toylib.layers.Dropout",
            definition="randomly zero a fraction of inputs",
            init_snippet="toylib.layers.Dropout(rate=0.5)",
            parameters=(
                _p("rate", "float", range=ValueRange(low=0.0, high=1.0),
                   default=0.5, has_default=True),
            ),
            similarity=(("toylib.layers.LeakyReLU", 0.7),),
        ),
        ApiSpec(
            name="toylib.layers.LeakyReLU",
            definition="leaky rectified linear activation",
            init_snippet="toylib.layers.LeakyReLU(alpha=0.1)",
            parameters=(
                _p("alpha", "float", range=ValueRange(low=0.0), default=0.3,
                   has_default=True),
            ),
        ),
        ApiSpec(
            name="toylib.layers.Gate",
            definition="gated mixing layer",
            init_snippet="toylib.layers.Gate(mode='fast')",
            parameters=(
                _p("mode", "enum", enum_values=("fast", "exact"),
                   default="fast", has_default=True),
            ),
        ),
        ApiSpec(
            name="toylib.layers.Mix",
            definition="stochastic feature mixing layer",
            init_snippet="toylib.layers.Mix(p=0.5)",
            parameters=(
                _p("p", "float", range=ValueRange(low=0.0, high=1.0),
                   default=0.5, has_default=True),
                _p("bias", "boolean", default=True, has_default=True),
            ),
        ),
        ApiSpec(
            name="toylib.layers.Output",
            definition="output layer producing class scores",
            init_snippet="toylib.layers.Output(units=2)",
            parameters=(
                _p("units", "int", range=ValueRange(low=1), default=2,
                   has_default=True),
            ),
        ),
    ]
    return {spec.name: spec for spec in specs}


SEQ_SEED = """\
import toylib as tl

x = tl.layers.Input(shape=(8,))
x = tl.layers.Dense(units=16, activation='relu')(x)
x = tl.layers.Dropout(rate=0.5)(x)
x = tl.layers.LeakyReLU(alpha=0.1)(x)
y = tl.layers.Output(units=2)(x)
model = tl.Model(y)
model.fit(TRAIN_DATA, epochs=EPOCHS)
model.evaluate(TRAIN_DATA)
"""


CLASS_SEED = """\
import toylib as tl


class Net(tl.Module):
    def __init__(self):
        self.inp = tl.layers.Input(shape=(8,))
        self.fc1 = tl.layers.Dense(units=16)
        self.drop = tl.layers.Dropout(rate=0.5)
        self.out = tl.layers.Output(units=2)

    def forward(self, x):
        x = self.inp(x)
        x = self.fc1(x)
        x = self.drop(x)
        x = self.out(x)
        return x


model = tl.Model(Net())
model.fit(TRAIN_DATA, epochs=EPOCHS)
"""


@pytest.fixture
def kb():
    return toy_kb()


@pytest.fixture
def seq_seed_text():
    return SEQ_SEED


@pytest.fixture
def class_seed_text():
    return CLASS_SEED
