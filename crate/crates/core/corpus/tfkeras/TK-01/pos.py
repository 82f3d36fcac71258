import tensorflow as tf


def read_all(paths):
    rows = []
    for p in paths:
        f = open(p)  # expect[TK-01]
        rows.append(f.read())
    return rows
