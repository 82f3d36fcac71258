import tensorflow as tf

weights = tf.ones((4, 4))
bias = tf.ones((4,))
out = weights + bias  # expect[TK-12]
