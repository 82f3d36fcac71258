import tensorflow as tf

inputs = tf.keras.Input(shape=(16,))
hidden = tf.keras.layers.Dense(16)(inputs)
folded = tf.keras.layers.Reshape((4, 4))(hidden)
model = tf.keras.Model(inputs, folded)
