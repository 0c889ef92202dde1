"""Exception types raised across the planning pipeline."""


class PlannerError(Exception):
    """Base class for all portalplan errors."""


# -- decomposition ----------------------------------------------------------

class DegenerateObstacle(PlannerError):
    """Obstacle polygon is self-intersecting, near-zero-area or out of bounds."""


class OverlappingObstacles(PlannerError):
    """Two obstacle constraint segments properly intersect."""


class PointInObstacle(PlannerError):
    """Query point lies inside an obstacle-labelled region."""


class EmptyFreeSpace(PlannerError):
    """Obstacles cover the whole workspace."""


# -- graph / query binding --------------------------------------------------

class StartInObstacle(PlannerError):
    pass


class GoalInObstacle(PlannerError):
    pass


# -- learned scoring --------------------------------------------------------

class SchemaMismatch(PlannerError):
    """Weight file is unreadable or its schema version is unsupported."""


class ShapeMismatch(PlannerError):
    """Weight tensor shapes are inconsistent with the file header."""


class FeatureVersionMismatch(PlannerError):
    """Weight file was produced for a different feature packing."""


class NonFiniteActivation(PlannerError):
    """Forward pass produced NaN/Inf activations."""


# -- search / evaluation ----------------------------------------------------

class NoCorridor(PlannerError):
    """Goal cell unreachable under the current portal filter."""


class NoSolution(PlannerError):
    """Start and goal cells are disconnected in the cell graph."""


class MalformedCorridor(PlannerError):
    """Corridor cells are not pairwise adjacent through portals."""


# -- execution --------------------------------------------------------------

class InfeasibleStart(PlannerError):
    """Initial pose already violates the wall-clearance barrier."""


# -- scenarios --------------------------------------------------------------

class InvalidSpec(PlannerError):
    """Scenario specification is inconsistent or unsatisfiable."""
