import torch


def joint_pass(model, train_loader, aux_loader):
    for a, b in zip(train_loader, aux_loader):  # expect[PT-10]
        model.consume(a, b)
