from typing import Annotated, List, Optional

import numpy as np
from typing_extensions import TypedDict

from spectralct.dictionary import CodeBook


class HistoryRow(TypedDict, total=False):
    iteration: Annotated[int, "1-based outer iteration"]
    data_fidelity: Annotated[float, "sum over channels of ||A x_s - y_s||^2 (normalized units)"]
    dictionary_residual: Annotated[float, "sum over patches of ||Z_r X - decoded patch r||_F^2"]
    gradient_l0: Annotated[int, "sum over channels of the gradient l0 count"]
    coupling: Annotated[float, "beta * ||X - U - T||^2"]
    multiplier_norm: Annotated[float, "||T||_F, grows without bound when the split diverges"]
    split_gap: Annotated[float, "||X - U||_F, zero for methods without the gradient-l0 split"]
    objective: Annotated[float, "data_fidelity + lambda * dictionary_residual + mu * gradient_l0"]
    rmse: Annotated[float, "channel-averaged RMSE against the truth"]
    ssim: Annotated[float, "channel-averaged SSIM against the truth"]


class ReconState(TypedDict):
    method: Annotated[str, "Reconstruction method driving this state"]
    scale: Annotated[float, "Normalization scale; images are stored divided by it"]
    X: Annotated[np.ndarray, "Spectral image (I1, I2, S), normalized"]
    U: Annotated[np.ndarray, "Auxiliary image of the gradient-l0 split"]
    T: Annotated[np.ndarray, "Scaled multiplier of the gradient-l0 split"]
    codebook: Annotated[Optional[CodeBook], "Sparse codes and means of every patch position"]
    lam: Annotated[float, "Dictionary term weight lambda"]
    beta: Annotated[float, "Coupling weight beta"]
    mu: Annotated[float, "Gradient-l0 weight mu = lambda_star * beta"]
    iteration: Annotated[int, "Completed outer iterations"]
    history: Annotated[List[HistoryRow], "One row per completed outer iteration"]
