from .grad_norm import clip_grad_norm, grad_norm

__all__ = ["grad_norm", "clip_grad_norm"]
