"""Composable molecular interaction modelling.

Build drug-target, drug-drug and protein-protein interaction models from
registered encoders and interaction layers, train them and evaluate them::

    from molrel import ModelSpec, Trainer, TrainConfig
    spec = ModelSpec("dti")
    spec.add_encoder("drug", "GCN")
    spec.add_encoder("protein", "CNN")
    spec.apply_mlp()
    model = spec.build(seed=0)
"""
__version__ = "0.1.0"

_EXPORTS = {
    "BuiltModel": "compose", "ModelSpec": "compose", "registry_inventory": "compose",
    "enumerate_model_space": "modelspace",
    "InteractionDataset": "dataio", "kfold": "dataio", "load_ddi": "dataio", "load_dti": "dataio",
    "load_ppi": "dataio", "sample_negatives": "dataio", "split_random": "dataio",
    "split_stratified": "dataio",
    "MetricReport": "metrics", "binary_metrics": "metrics", "multiclass_metrics": "metrics",
    "regression_metrics": "metrics",
    "get_preset": "presets", "preset_names": "presets",
    "TrainConfig": "train", "Trainer": "train",
}
__all__ = sorted(_EXPORTS)


def __getattr__(name):
    # lazy so that light commands (e.g. counting the model space) skip the torch import
    if name in _EXPORTS:
        import importlib
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
