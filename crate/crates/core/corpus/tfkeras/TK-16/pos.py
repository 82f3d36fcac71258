import keras
from sklearn.model_selection import GridSearchCV

search = GridSearchCV(estimator, param_grid, n_jobs=-1)  # expect[TK-16]
