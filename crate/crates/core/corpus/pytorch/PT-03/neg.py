import itertools

import torch


def warm_up(model, batches, steps=100):
    for batch in itertools.islice(itertools.cycle(batches), steps):
        with torch.no_grad():
            model(batch)
