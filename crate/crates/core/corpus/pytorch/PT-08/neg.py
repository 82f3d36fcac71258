from torch.utils.data import DataLoader


def fit(model, dataset, epochs):
    loader = DataLoader(dataset, batch_size=32, num_workers=4, persistent_workers=True)
    for epoch in range(epochs):
        for x in loader:
            model.train_batch(x)
