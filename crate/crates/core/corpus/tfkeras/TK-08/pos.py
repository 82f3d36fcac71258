import tensorflow as tf

augmented = []


def augment_images(images):
    for img in images:
        augmented.append(tf.image.flip_left_right(img))  # expect[TK-08]
    return augmented
