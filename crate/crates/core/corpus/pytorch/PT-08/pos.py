from torch.utils.data import DataLoader


def fit(model, dataset, epochs):
    for epoch in range(epochs):
        loader = DataLoader(dataset, batch_size=32)  # expect[PT-08]
        for x in loader:
            model.train_batch(x)
