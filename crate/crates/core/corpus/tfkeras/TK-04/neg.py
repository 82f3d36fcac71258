import tensorflow as tf

for units in [16, 32, 64]:
    tf.keras.backend.clear_session()
    model = tf.keras.Sequential([tf.keras.layers.Dense(units)])
    model.compile(optimizer="adam", loss="mse")
    model.fit(x_train, y_train)
