'''
Elementary symmetric functions of principal curvatures:
- elem_sym / elem_sym_all: sigma_k by the product expansion of prod_i (t + kappa_i)
- maclaurin_chain: the normalized chain [sigma_j / C(n,j)]^(1/j), j=1..k
- gamma_k_membership: membership in the open cone Gamma_k = {sigma_1>0, ..., sigma_k>0}
- rigidity_threshold / mean_curvature_floor: the curvature hypotheses used by
  the rigidity theorems, expressed on a curvature vector.

>>> elem_sym(2, [1, 1, 1])
3.0
>>> elem_sym(2, [1, 2, 3])
11.0
>>> gamma_k_membership([3, -1], 1), gamma_k_membership([-1, 3], 2)
(True, False)
'''

import itertools
import warnings

import numpy as np
from scipy.special import comb

from hemirigid.errors import DomainError, PreconditionError

# sigma_j within this distance of 0 is not counted as positive (Gamma_k is open).
SIGMA_ZERO_TOL = 1e-14

AMBIENTS = ("euclidean", "hyperbolic")


class CurvatureVector:
    '''
    Principal curvatures kappa = (kappa_1, ..., kappa_n), stored as a 1-d float array.
    '''

    def __init__(self, entries):
        entries = np.array(entries, dtype=np.float64).reshape(-1)
        if entries.size < 1:
            raise DomainError("A curvature vector needs at least one entry.")
        if not np.all(np.isfinite(entries)):
            raise DomainError(f"Curvature vector has non-finite entries: {entries}")
        self.entries = entries

    @property
    def n(self):
        return self.entries.size

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.entries)

    def __repr__(self):
        return f"CurvatureVector({self.entries.tolist()})"


def as_curvature_vector(lam):
    return lam if isinstance(lam, CurvatureVector) else CurvatureVector(lam)


def binomial(n, k):
    '''Exact binomial coefficient C(n,k), as a float.'''
    return float(comb(n, k, exact=True))


class SymmetricProfile:
    '''
    sigma_1..sigma_n of a curvature vector, their binomial normalization, and the
    Maclaurin chain over the prefix where it is defined.
    Lists are 0-based: sigma[j-1] is sigma_j.
    '''

    def __init__(self, sigma, maclaurin_chain=None):
        self.sigma = [float(s) for s in sigma]
        n = len(self.sigma)
        self.normalized = [s / binomial(n, j + 1) for j, s in enumerate(self.sigma)]
        self.maclaurin_chain = [] if maclaurin_chain is None else list(maclaurin_chain)

    @property
    def n(self):
        return len(self.sigma)

    def to_dict(self):
        return dict(
            sigma=self.sigma,
            normalized=self.normalized,
            maclaurin_chain=self.maclaurin_chain,
        )


def _check_order(k, n):
    if not 1 <= k <= n:
        raise DomainError(f"Order k={k} is out of range 1..{n}.")


def elem_sym_all(lam):
    '''
    Return the array [sigma_0=1, sigma_1, ..., sigma_n] of the vector <lam>.
    The coefficients of prod_i (t + lam_i) are accumulated one factor at a time.
    '''
    lam = as_curvature_vector(lam)
    e = np.zeros(lam.n + 1)
    e[0] = 1.0
    for kappa in lam.entries:
        e[1:] += kappa * e[:-1]
    return e


def elem_sym(k, lam):
    lam = as_curvature_vector(lam)
    _check_order(k, lam.n)
    return float(elem_sym_all(lam)[k])


def elem_sym_enumerate(k, lam):
    '''
    Brute force sigma_k by enumeration of the k-subsets. Exponential cost, only
    meant as an oracle for elem_sym.
    >>> elem_sym_enumerate(3, [1, 2, 3])
    6.0
    '''
    lam = as_curvature_vector(lam)
    _check_order(k, lam.n)
    return float(
        sum(np.prod(subset) for subset in itertools.combinations(lam.entries, k))
    )


def _first_nonpositive(e, k):
    '''First j in 1..k with sigma_j not safely positive, or None.'''
    for j in range(1, k + 1):
        if e[j] <= SIGMA_ZERO_TOL:
            return j
    return None


def maclaurin_chain(lam, k):
    '''
    Compute the chain [sigma_j/C(n,j)]^(1/j) for j=1..k. Requires sigma_j > 0
    for every j <= k, otherwise PreconditionError(index=j) is raised for the
    first failing j.
    >>> [round(c, 6) for c in maclaurin_chain([2, 1, 1], 2).maclaurin_chain]
    [1.333333, 1.290994]
    '''
    lam = as_curvature_vector(lam)
    n = lam.n
    _check_order(k, n)
    e = elem_sym_all(lam)
    j = _first_nonpositive(e, k)
    if j is not None:
        if e[j] > 0:
            msg = f"sigma_{j} = {e[j]:.3e} is within {SIGMA_ZERO_TOL} of 0"
        else:
            msg = f"sigma_{j} = {e[j]:.6g} is not positive"
        raise PreconditionError(msg + f" for {lam}.", index=j)
    chain = [(e[j] / binomial(n, j)) ** (1.0 / j) for j in range(1, k + 1)]
    return SymmetricProfile(e[1:], [float(c) for c in chain])


def symmetric_profile(lam):
    '''
    Profile of <lam> with the Maclaurin chain over its longest positive prefix
    (empty when sigma_1 <= 0).
    '''
    lam = as_curvature_vector(lam)
    e = elem_sym_all(lam)
    j = _first_nonpositive(e, lam.n)
    k = lam.n if j is None else j - 1
    if k == 0:
        return SymmetricProfile(e[1:])
    return maclaurin_chain(lam, k)


def gamma_k_membership(lam, k):
    '''True iff sigma_j(lam) > 0 for j=1..k.'''
    lam = as_curvature_vector(lam)
    _check_order(k, lam.n)
    e = elem_sym_all(lam)
    j = _first_nonpositive(e, k)
    if j is not None and 0 < e[j]:
        warnings.warn(
            f"sigma_{j} = {e[j]:.3e} is positive but within the zero tolerance; "
            "counted as outside Gamma_k.",
            category=UserWarning,
            stacklevel=2,
        )
    return j is None


def rigidity_threshold(k, n, ambient="euclidean"):
    '''
    The lower bound on sigma_k assumed by the rigidity theorems: C(n,k) for the
    unit hemisphere in R^{n+1}, 2^{k/2} C(n,k) for the model sphere in H^{n+1}.
    >>> rigidity_threshold(2, 3)
    3.0
    >>> rigidity_threshold(2, 3, "hyperbolic")
    6.0
    '''
    _check_order(k, n)
    if ambient == "euclidean":
        return binomial(n, k)
    if ambient == "hyperbolic":
        return 2 ** (k / 2) * binomial(n, k)
    raise DomainError(f"Unknown ambient space {ambient!r}, expected one of {AMBIENTS}.")


def mean_curvature_floor(lam, k):
    '''
    n [sigma_k/C(n,k)]^(1/k), a lower bound of sigma_1 inside Gamma_k.
    '''
    profile = maclaurin_chain(lam, k)
    return profile.n * profile.maclaurin_chain[-1]
