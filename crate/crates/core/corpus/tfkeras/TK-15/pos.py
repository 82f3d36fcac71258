import os

import keras

os.environ["LD_LIBRARY_PATH"] = "/usr/local/cuda-10.0/lib64"
os.environ["CUDA_HOME"] = "/usr/local/cuda-11.2"  # expect[TK-15]
