"""Strong right-invariant sub-Riemannian geometry on diffeomorphism groups."""
