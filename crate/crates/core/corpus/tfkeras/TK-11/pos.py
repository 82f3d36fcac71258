import tensorflow as tf

model = tf.keras.models.load_model("model.h5")
scores = model.predict(x_test)
del model  # expect[TK-11]
