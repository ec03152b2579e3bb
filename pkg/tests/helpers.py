"""Small constructors shared by the test modules."""
from elastodg import DGSpace, assemble_matrices, build_mesh


def make_space(N=8, K=1, a=0.0, b=8.0):
    return DGSpace(build_mesh(a, b, N), K)


def make_matrices(N=8, K=1, mu=1.0):
    sp = make_space(N, K)
    return sp, assemble_matrices(sp, mu)


# criterion number -> list of (passed, description); printed after the run
ACCEPTANCE: dict[int, list] = {}


def record(criterion, ok, text):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), text))
    return bool(ok)
