import keras

history = model.fit(x_train, y_train, batch_size=32)
