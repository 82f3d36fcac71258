import tensorflow as tf

state = tf.zeros([4])
for step in range(100):
    state = tf.add(state, 1.0)  # expect[TK-06]
