import numpy as np
import tensorflow as tf

embeddings = np.load("embeddings.npy")
table = tf.constant(embeddings)  # expect[TK-10]
