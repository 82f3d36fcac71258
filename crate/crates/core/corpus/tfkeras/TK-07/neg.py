import tensorflow as tf

with tf.compat.v1.Session() as sess:
    result = sess.run(fetches)

other = tf.compat.v1.Session()
other.run(fetches)
other.close()
