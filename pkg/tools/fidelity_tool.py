"""Fidelity tools for one lattice or one unprotected qubit."""

from analysis import single_qubit_fidelity
from models import EngineKind, ModelVariant
from utils import format_real

from .base import BaseTool

# Super-Ohmic bath of the shipped presets, used when no bath is given
DEFAULT_BATH = {"beta": 0.1, "delta": 10.0, "v": 1.0}


class FidelityTool(BaseTool):
    """Tool for computing the logical fidelity of a surface-code patch."""

    def compute_fidelity(
        self,
        nx: int,
        ny: int,
        gamma: float,
        variant: str = "super_local",
        engine: str = "auto",
        eta: float | None = None,
        s: float | None = None,
        beta: float | None = None,
        delta: float | None = None,
        v: float | None = None,
        seed: int | None = None,
        n_sweeps: int | None = None,
    ) -> str:
        """
        Compute F = 1 / (1 + <B>) at one reduced coupling gamma.

        Args:
            nx: Plaquette columns
            ny: Plaquette rows
            gamma: Reduced coupling lambda^2 F(Delta; 0; beta)
            variant: Effective model (super_local, super_imag, general_kernel, ohmic_longrange)
            engine: auto, brute, binder or mc
            eta: Nearest-neighbour coupling for super_imag
            s: Spectral exponent (defaults to the one the variant was derived for)
            beta: Inverse bath temperature
            delta: Time between syndrome extractions
            v: Bath propagation speed
            seed: Root seed for Monte Carlo
            n_sweeps: Monte Carlo sweeps, burn-in included

        Returns:
            Fidelity with its standard error and the engine that produced it
        """
        try:
            model_variant = ModelVariant(variant)
            exponent = s if s is not None else model_variant.expected_exponent
            env = {**DEFAULT_BATH, "s": 0.5 if exponent is None else exponent}
            env.update({k: val for k, val in {"beta": beta, "delta": delta, "v": v}.items() if val is not None})
            schedule = {"n_sweeps": n_sweeps} if n_sweeps is not None else None
            runner = self.make_runner(
                {
                    "env": env,
                    "variant": model_variant.value,
                    "engine": engine,
                    "sizes": [[nx, ny]],
                    "gammas": [gamma],
                    "eta": eta,
                    "seed": seed,
                    "schedule": schedule,
                }
            )
            (estimate,) = runner.sweep()
        except Exception as e:
            return self.error("Fidelity computation", e)

        self.logger.info(f"F({nx}x{ny}, gamma={gamma}) = {estimate.fidelity:.6f}")
        output = f"[OK] **Fidelity {nx}x{ny}** ({model_variant.value}, gamma = {format_real(gamma)})\n\n"
        output += f"**F:** {format_real(estimate.fidelity)}"
        if estimate.stderr:
            output += f" +- {estimate.stderr:.2g}"
        output += f"\n**<B>:** {format_real(estimate.b_corr_mean)}\n"
        output += f"**Engine:** {estimate.method.value}\n"
        if estimate.method is EngineKind.MC:
            output += f"**Acceptance:** {estimate.acceptance_rate:.3f}\n"
            output += f"**Seed:** {estimate.seed}\n"
        if not estimate.valid:
            output += "**Warning:** estimate is outside the physical range\n"
        return output

    def single_qubit_fidelity(
        self,
        lambda_coupling: float,
        s: float,
        beta: float,
        delta: float,
        v: float = 1.0,
    ) -> str:
        """
        Fidelity of one unprotected qubit over one cycle.

        Args:
            lambda_coupling: Qubit-bath coupling lambda
            s: Spectral exponent
            beta: Inverse bath temperature
            delta: Time between syndrome extractions
            v: Bath propagation speed

        Returns:
            F = 1 / (1 + tanh(lambda^2 F(Delta; 0; beta) / 2))
        """
        try:
            env = self.make_env(s=s, beta=beta, delta=delta, v=v)
            value = single_qubit_fidelity(lambda_coupling, env, self.get_evaluator())
        except Exception as e:
            return self.error("Single-qubit fidelity", e)
        return f"[OK] Single-qubit fidelity at lambda = {lambda_coupling}: {format_real(value)}"
