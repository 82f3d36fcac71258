import tensorflow as tf

tf.compat.v1.disable_eager_execution()
with tf.compat.v1.Session() as sess:
    x = tf.compat.v1.placeholder(tf.int32)
    doubled = x * 2
    for i in range(100):
        print(sess.run(doubled, feed_dict={x: i}))
