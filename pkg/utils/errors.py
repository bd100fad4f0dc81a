"""
Exception hierarchy for the walk-view toolkit.

Every error raised by the library is a WalkViewError, which is a ValueError,
so callers that only care about "bad input" can keep catching ValueError.
The CLI and the HTTP routes catch WalkViewError and turn it into exit codes
or JSON error bodies.
"""


class WalkViewError(ValueError):
    """Base class for all library errors."""

    code = 'walkview_error'

    def to_dict(self):
        return {'error': self.code, 'message': str(self)}


# ============================================
# GRAPH CONSTRUCTION / VALIDATION
# ============================================

class InvalidGraph(WalkViewError):
    code = 'InvalidGraph'

    def __init__(self, report):
        self.report = report
        kinds = ', '.join(sorted({v.kind for v in report.violations}))
        super().__init__(f"graph failed validation: {kinds}")


class EmptyGraph(WalkViewError):
    code = 'EmptyGraph'

    def __init__(self):
        super().__init__("graph has no nodes")


class GraphTooLarge(WalkViewError):
    code = 'GraphTooLarge'

    def __init__(self, node_count, limit):
        self.node_count = node_count
        self.limit = limit
        super().__init__(f"graph has {node_count} nodes, dense limit is {limit}")


class NotConnected(WalkViewError):
    code = 'NotConnected'

    def __init__(self, component_count):
        self.component_count = component_count
        super().__init__(f"graph has {component_count} components; run repair first")


class TooSmall(WalkViewError):
    code = 'TooSmall'

    def __init__(self, node_count):
        self.node_count = node_count
        super().__init__(f"walk2 view needs at least 3 nodes, got {node_count}")


# ============================================
# RANDOM WALK MACHINERY
# ============================================

class IsolatedNode(WalkViewError):
    code = 'IsolatedNode'

    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node} has zero degree; transition row undefined")


class ZeroTotalDegree(WalkViewError):
    code = 'ZeroTotalDegree'

    def __init__(self):
        super().__init__("all degrees are zero; stationary distribution undefined")


class InvalidDistribution(WalkViewError):
    code = 'InvalidDistribution'


class OracleScaleExceeded(WalkViewError):
    code = 'OracleScaleExceeded'

    def __init__(self, node_count, length):
        self.node_count = node_count
        self.length = length
        super().__init__(f"brute-force walk oracle limited to n <= 8 and k <= 6 (got n={node_count}, k={length})")


# ============================================
# SPECTRAL
# ============================================

class NotSymmetric(WalkViewError):
    code = 'NotSymmetric'

    def __init__(self, asymmetry):
        self.asymmetry = asymmetry
        super().__init__(f"matrix is not symmetric (max |A - A^T| = {asymmetry:.3e})")


class NotPSD(WalkViewError):
    code = 'NotPSD'

    def __init__(self, eigenvalue):
        self.eigenvalue = eigenvalue
        super().__init__(f"matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")


class NoConvergence(WalkViewError):
    code = 'NoConvergence'

    def __init__(self, max_sweeps, off_norm):
        self.max_sweeps = max_sweeps
        self.off_norm = off_norm
        super().__init__(f"Jacobi solver did not converge in {max_sweeps} sweeps (off-diagonal norm {off_norm:.3e})")


class GammaOutOfRange(WalkViewError):
    code = 'GammaOutOfRange'

    def __init__(self, gamma):
        self.gamma = gamma
        super().__init__(f"gamma must lie in (0, 1], got {gamma}")


class NegativeOffDiagonal(WalkViewError):
    code = 'NegativeOffDiagonal'

    def __init__(self, value):
        self.value = value
        super().__init__(f"fractional adjacency has entry {value:.3e} < -1e-6; eigensolver result is unreliable")


class ZeroTrace(WalkViewError):
    code = 'ZeroTrace'

    def __init__(self):
        super().__init__("fractional Laplacian has zero trace; graph has no edges")


# ============================================
# FEATURES / MODEL
# ============================================

class UnknownCategory(WalkViewError):
    code = 'UnknownCategory'

    def __init__(self, value, attribute=None):
        self.value = value
        self.attribute = attribute
        where = f" for attribute '{attribute}'" if attribute else ""
        super().__init__(f"value {value!r}{where} is not in the vocabulary")


class InvalidSelection(WalkViewError):
    code = 'InvalidSelection'


class DimensionMismatch(WalkViewError):
    code = 'DimensionMismatch'


class NonFiniteLoss(WalkViewError):
    code = 'NonFiniteLoss'

    def __init__(self, loss, epoch=None, batch=None):
        self.loss = loss
        self.epoch = epoch
        self.batch = batch
        where = ""
        if epoch is not None:
            where = f" at epoch {epoch}, batch {batch}"
        super().__init__(f"loss became non-finite ({loss}){where}")


class EmptyEnsemble(WalkViewError):
    code = 'EmptyEnsemble'

    def __init__(self):
        super().__init__("ensemble needs at least one model")


class DegenerateLabels(WalkViewError):
    code = 'DegenerateLabels'


# ============================================
# FILES
# ============================================

class DocumentError(WalkViewError):
    code = 'DocumentError'


class ManifestError(WalkViewError):
    code = 'ManifestError'
