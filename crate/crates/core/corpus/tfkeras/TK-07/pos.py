import tensorflow as tf

sess = tf.compat.v1.Session()  # expect[TK-07]
result = sess.run(fetches)
