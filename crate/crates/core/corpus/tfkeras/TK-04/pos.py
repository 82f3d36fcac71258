import tensorflow as tf

for units in [16, 32, 64]:
    model = tf.keras.Sequential([tf.keras.layers.Dense(units)])  # expect[TK-04]
    model.compile(optimizer="adam", loss="mse")
    model.fit(x_train, y_train)
