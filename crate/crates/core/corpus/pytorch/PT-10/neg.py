import torch


def joint_pass(model, train_loader, aux_loader):
    aux_iter = iter(aux_loader)
    for a in train_loader:
        model.consume(a, next(aux_iter))
    for x, y in zip([1, 2], [3, 4]):
        print(x, y)
