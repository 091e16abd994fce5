class SrSenseError(Exception):
    pass


class InputValidationError(SrSenseError, ValueError):
    pass


class InsufficientSamplesError(InputValidationError):
    pass


class CalculationNotSupported(SrSenseError):
    pass


class ConfigError(SrSenseError):
    pass


class OptimizationError(SrSenseError):
    pass


class IntegratorDivergenceError(SrSenseError, ArithmeticError):
    """Raised when the SR particle leaves the |x| <= 1e6 region."""

    def __init__(
        self,
        sample_index: int,
        value: float,
        noise_d: float | None = None,
    ):
        self.sample_index = sample_index
        self.value = value
        self.noise_d = noise_d
        msg = f"integrator diverged at sample {sample_index} (x={value!r})"
        if noise_d is not None:
            msg += f" with noise intensity D={noise_d:g}"
        super().__init__(msg)

    def with_noise(self, noise_d: float) -> "IntegratorDivergenceError":
        return IntegratorDivergenceError(
            self.sample_index, self.value, noise_d
        )
