import tensorflow as tf

augmented = []


def augment_images(images):
    augmented.clear()
    for img in images:
        augmented.append(tf.image.flip_left_right(img))
    return augmented
