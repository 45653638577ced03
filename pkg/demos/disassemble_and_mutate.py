"""Disassemble a seed program into a template plus blocks, then show what the
three mutation operators do to one block.

The seed stacks layers of a fictional 'toylib'; the knowledge base describes
each constructor's parameters, ranges, and an inter-API similarity entry.
"""

import random

from blockforge import (
    ApiSpec,
    ParameterSpec,
    SeedFile,
    ValueRange,
    disassemble_seed,
    generate_block_variants,
)

SEED = """\
import toylib as tl

x = tl.layers.Input(shape=(8,))
x = tl.layers.Dense(units=16, activation='relu')(x)
x = tl.layers.Dropout(rate=0.5)(x)
x = tl.layers.LeakyReLU(alpha=0.1)(x)
y = tl.layers.Output(units=2)(x)
model = tl.Model(y)
model.fit(TRAIN_DATA, epochs=EPOCHS)
"""


def knowledge_base():
    def p(name, dtype, **kw):
        return ParameterSpec(name=name, dtype=dtype, **kw)

    specs = [
        ApiSpec(
            name="toylib.layers.Input",
            definition="input layer holding the sample shape",
            init_snippet="toylib.layers.Input(shape=(8,))",
            parameters=(p("shape", "tensor-shape"),),
        ),
        ApiSpec(
            name="toylib.layers.Dense",
            definition="fully connected layer",
            init_snippet="toylib.layers.Dense(units=16)",
            parameters=(
                p("units", "int", range=ValueRange(low=1), default=16,
                  has_default=True),
                p("activation", "enum", enum_values=("relu", "tanh", "None"),
                  default="relu", has_default=True),
            ),
        ),
        ApiSpec(
            name="toylib.layers.Dropout",
            definition="randomly zero a fraction of inputs",
            init_snippet="toylib.layers.Dropout(rate=0.5)",
            parameters=(
                p("rate", "float", range=ValueRange(low=0.0, high=1.0),
                  default=0.5, has_default=True),
            ),
            similarity=(("toylib.layers.LeakyReLU", 0.7),),
        ),
        ApiSpec(
            name="toylib.layers.LeakyReLU",
            definition="leaky rectified linear activation",
            init_snippet="toylib.layers.LeakyReLU(alpha=0.1)",
            parameters=(
                p("alpha", "float", range=ValueRange(low=0.0), default=0.3,
                  has_default=True),
            ),
        ),
        ApiSpec(
            name="toylib.layers.Output",
            definition="output layer producing class scores",
            init_snippet="toylib.layers.Output(units=2)",
            parameters=(
                p("units", "int", range=ValueRange(low=1), default=2,
                  has_default=True),
            ),
        ),
    ]
    return {s.name: s for s in specs}


def main():
    kb = knowledge_base()
    template, blocks = disassemble_seed(SeedFile.from_text(SEED), kb)

    print("template with open slots:")
    print()
    print(template.render())

    print("hidden-layer blocks:")
    for block in blocks:
        print(f"  [{block.id}] {block.call.callee_fqn}")
        for line in block.source_lines:
            print(f"      {line}")

    print("\nvariants of the Dropout block (times_mt=3, rng seed 7):")
    dropout = blocks[1]
    for variant, record in generate_block_variants(
        dropout, 3, kb, random.Random(7)
    ):
        tag = record.operator
        if record.parameter:
            tag += f" {record.parameter}={record.new_value!r}"
        print(f"  {tag:32s} ({record.expected_state})")
        print(f"      {variant.rendered_mutation_line()}")


if __name__ == "__main__":
    main()
