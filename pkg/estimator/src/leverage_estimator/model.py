"""Convolutional architectures for iterate classification and parameter regression.

Both models share the same trunk on length-59 inputs: a width-2 valid
convolution to 128 filters, a width-2 stride-2 valid convolution to 64, then
five width-2 stride-2 same-padded convolutions collapsing 29 -> 15 -> 8 -> 4
-> 2 -> 1, flatten, and dense layers 128 and 64.  They differ only in the
head: a 3-way softmax for the iterate classifier (74,883 trainable weights)
and a 2-unit linear output for the parameter regressor (74,818).
"""

from __future__ import annotations

INPUT_LENGTH = 59
CNN1_PARAM_COUNT = 74_883
CNN2_PARAM_COUNT = 74_818
L2_WEIGHT = 1e-6


def build_model(kind: str, seed: int = 0):
    """Build "cnn1" (iterate classifier) or "cnn2" (parameter regressor)."""
    import tensorflow as tf

    if kind not in ("cnn1", "cnn2"):
        raise ValueError(f"unknown model kind {kind!r}")
    tf.keras.utils.set_random_seed(seed)
    reg = tf.keras.regularizers.l2(L2_WEIGHT)
    layers = tf.keras.layers
    conv = dict(kernel_size=2, activation="relu", kernel_regularizer=reg)
    model = tf.keras.Sequential(name=kind)
    model.add(layers.Input(shape=(INPUT_LENGTH,)))
    model.add(layers.Reshape((INPUT_LENGTH, 1)))
    model.add(layers.Conv1D(128, strides=1, padding="valid", **conv))  # 58
    model.add(layers.Conv1D(64, strides=2, padding="valid", **conv))   # 29
    for _ in range(5):                                                 # 15..1
        model.add(layers.Conv1D(64, strides=2, padding="same", **conv))
    model.add(layers.Flatten())
    model.add(layers.Dense(128, activation="relu", kernel_regularizer=reg))
    model.add(layers.Dense(64, activation="relu", kernel_regularizer=reg))
    if kind == "cnn1":
        model.add(layers.Dense(3, activation="softmax"))
        model.compile(optimizer="adam", loss="categorical_crossentropy",
                      metrics=["accuracy"])
    else:
        model.add(layers.Dense(2))
        model.compile(optimizer="adam", loss="mse", metrics=["mse"])
    return model


def trainable_parameter_count(model) -> int:
    return int(sum(w.shape.num_elements() for w in model.trainable_weights))


def check_shapes(model) -> list:
    """Conv-stage output lengths, for the model card."""
    lengths = []
    for layer in model.layers:
        if layer.__class__.__name__ == "Conv1D":
            lengths.append(int(layer.output.shape[1]))
    return lengths
