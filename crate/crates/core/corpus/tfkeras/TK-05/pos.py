import tensorflow as tf

dataset = tf.data.Dataset.from_tensor_slices(images).batch(32)
for epoch in range(3):
    preds = model.predict(dataset)  # expect[TK-05]
