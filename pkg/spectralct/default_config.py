DEFAULT_CONFIG = {
    "output_dir": "runs/default",
    # Logging and progress
    "log_level": "INFO",
    "progress": True,  # tqdm bars on K-CPD and outer reconstruction loops
    # Desk-scale fan-beam acquisition
    "image_size": 64,
    "pixel_size_mm": 0.6,
    "detector_count": 128,
    "detector_pitch_mm": 0.6,  # fan radius 27.5 mm covers the 27.2 mm image half-diagonal
    "source_to_detector_mm": 180.0,
    "source_to_center_mm": 132.0,
    "full_view_count": 640,
    # Dose settings
    "photons_per_ray": 5000.0,
    "zero_count_clamp": 0.5,  # counts below this are clamped before the log transform
    # Energy channels (keV edges)
    "channel_edges_kev": [16.0, 25.0, 31.0, 37.0, 50.0],
    # Dictionary settings
    "atom_count": 1024,
    "patch_size": 8,
    "recon_patch_stride": 1,
    "train_patch_stride": 1,
    "max_train_patches": 10000,
    "train_iterations": 50,
    "rank1_sweeps": 5,  # alternating sweeps for each rank-1 atom refit
    # Reconstruction settings
    "subsets": 10,
    "iterations": 200,
    "tv_inner_steps": 20,
    "fbp_filter": "ram-lak",
    "gradient_count_tol": 1.0e-6,  # |dx| + |dy| below this counts as flat in the history log
    # l0 continuation
    "tau_max": 1.0e5,
    "tau_growth": 1.1,
    # SSIM / FSIM constants
    "ssim_window": 8,
    "ssim_k1": 0.01,
    "ssim_k2": 0.03,
    "fsim_scales": 4,
    "fsim_orientations": 4,
    "fsim_min_wavelength": 6.0,
    "fsim_mult": 2.0,
    "fsim_sigma_onf": 0.55,
    "fsim_dtheta_on_sigma": 1.2,
    "fsim_noise_k": 2.0,
    "fsim_t1": 0.85,
    "fsim_t2": 160.0,
}
