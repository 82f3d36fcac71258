import tensorflow as tf


def heavy_transform(x):
    for _ in range(3):
        x = tf.square(x)
    return x


layer = tf.keras.layers.Lambda(heavy_transform)  # expect[TK-03]
