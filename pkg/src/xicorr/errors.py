"""Exception hierarchy shared by the library and the CLI."""


class XiError(ValueError):
    """A precondition of an estimator or interval method is violated."""


class LengthMismatchError(XiError):
    pass


class SampleSizeError(XiError):
    pass


class ConstantYError(XiError):
    def __init__(self, msg="Y is constant"):
        super().__init__(msg)


class NumericalError(RuntimeError):
    """Quadrature or root finding failed to reach the requested accuracy."""
