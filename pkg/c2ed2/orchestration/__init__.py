from .pipeline import EstimationOptions, EstimationPipeline, EstimationRun

__all__ = ["EstimationOptions", "EstimationPipeline", "EstimationRun"]
