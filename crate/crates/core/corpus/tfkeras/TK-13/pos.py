import keras

for epoch in range(10):  # expect[TK-13]
    generator.compile(optimizer="adam", loss="binary_crossentropy")
    discriminator.compile(optimizer="adam", loss="binary_crossentropy")
    generator.train_on_batch(noise, labels)
