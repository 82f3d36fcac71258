import tensorflow as tf


def read_all(paths):
    rows = []
    for p in paths:
        with open(p) as f:
            rows.append(f.read())
    return rows
