import itertools

import torch


def warm_up(model, batches):
    for batch in itertools.cycle(batches):  # expect[PT-03]
        with torch.no_grad():
            model(batch)
