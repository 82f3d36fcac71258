import tensorflow as tf

tf.compat.v1.disable_eager_execution()
with tf.compat.v1.Session() as sess:
    for i in range(100):
        c = tf.constant(i)  # expect[TK-09]
        print(sess.run(c))
