import tensorflow as tf

dataset = tf.data.Dataset.from_tensor_slices(images).batch(32)
preds = model.predict(dataset)
for epoch in range(3):
    scores = model.predict(images)
