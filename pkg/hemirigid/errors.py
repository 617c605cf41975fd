'''
Exceptions raised by hemirigid.
All of them derive from HemirigidError, so that a caller (typically the command
line) can catch every deliberate failure with a single except clause.
'''


class HemirigidError(Exception):
    pass


class DomainError(HemirigidError, ValueError):
    '''An argument is outside the domain of the operation (k > n, |x| > delta, ...).'''


class PreconditionError(HemirigidError, ValueError):
    '''
    A mathematical precondition does not hold.
    <index> is the first failing index when the precondition is a chain
    of inequalities (e.g. sigma_j > 0 for j=1..k).
    '''

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class AmbientViolationError(HemirigidError):
    '''A point lies outside the upper half-space model of the hyperbolic space.'''


class GeometryError(HemirigidError):
    pass


class EvaluationError(HemirigidError):
    '''A value or derivative of a field is not available at the requested point.'''


class ConfigurationError(HemirigidError):
    pass


class EllipticityError(HemirigidError):
    '''z(psi) <= 0 somewhere: the linearized operator is not elliptic.'''


class MeshError(HemirigidError):
    pass


class ContactError(HemirigidError):
    '''
    The sliding procedure could not produce a meaningful contact.
    <kind> is one of "incorporation", "start", "no_contact", "degenerate",
    "curvature_sign".
    '''

    def __init__(self, msg, kind=None):
        super().__init__(msg)
        self.kind = kind
