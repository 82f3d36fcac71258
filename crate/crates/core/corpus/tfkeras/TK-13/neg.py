import keras

generator.compile(optimizer="adam", loss="binary_crossentropy")
discriminator.compile(optimizer="adam", loss="binary_crossentropy")
for epoch in range(10):
    generator.train_on_batch(noise, labels)
    discriminator.train_on_batch(images, labels)
