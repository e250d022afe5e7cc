"""Bath kernel evaluation tool."""

from constants import DEFAULT_F_BAR_RATIO, DEFAULT_PHI_BAR_RATIO
from models import ModelVariant
from utils import config_section, format_real

from .base import BaseTool


class KernelTool(BaseTool):
    """Tool for evaluating F and Phi and reducing a bath to model couplings."""

    def evaluate_kernels(
        self,
        s: float,
        beta: float,
        delta: float,
        v: float = 1.0,
        distances: list[float] | None = None,
        cutoff: float | None = None,
        omega0: float | None = None,
    ) -> str:
        """
        Evaluate F(Delta; r; beta) and Phi(Delta; r) at the given separations.

        Args:
            s: Spectral exponent
            beta: Inverse bath temperature (0 = vacuum)
            delta: Time between syndrome extractions
            v: Bath propagation speed
            distances: Separations r (the on-site r = 0 row is always included)
            cutoff: Optional UV cutoff
            omega0: Characteristic frequency (default 1)

        Returns:
            One line per separation with quadrature and closed-form values
        """
        try:
            env = self.make_env(s=s, beta=beta, delta=delta, v=v, cutoff=cutoff, omega0=omega0)
            evaluator = self.get_evaluator()
            rows = [
                evaluator.kernel_row(env, r)
                for r in sorted({0.0, *(float(d) for d in distances or [])})
            ]
        except Exception as e:
            return self.error("Kernel evaluation", e)

        output = f"[*] **Kernels** (s={env.s}, beta={env.beta}, Delta={env.delta}, v={env.v})\n\n"
        for row in rows:
            output += f"**r = {format_real(row['distance'])}** ({row['regime']})\n"
            for key in ("F_quad", "F_closed", "Phi_quad", "Phi_closed"):
                value = row[key]
                output += f"  - {key}: {format_real(value) if value is not None else 'n/a'}\n"
        return output

    def reduce_couplings(
        self,
        s: float,
        beta: float,
        delta: float,
        lambda_coupling: float,
        variant: str,
        v: float = 1.0,
        eta: float | None = None,
    ) -> str:
        """
        Reduce a bath and physical coupling to the couplings of an effective model.

        Args:
            s: Spectral exponent
            beta: Inverse bath temperature
            delta: Time between syndrome extractions
            lambda_coupling: Qubit-bath coupling lambda
            variant: super_local, super_imag, general_kernel or ohmic_longrange
            v: Bath propagation speed
            eta: Override for the super_imag nearest-neighbour coupling

        Returns:
            The reduced coupling gamma and the model couplings
        """
        try:
            env = self.make_env(s=s, beta=beta, delta=delta, v=v)
            ohmic = config_section(self.config, "ohmic")
            model = self.get_evaluator().reduce_to_model(
                env,
                lambda_coupling,
                ModelVariant(variant),
                f_bar_ratio=ohmic.get("f_bar_ratio", DEFAULT_F_BAR_RATIO),
                phi_bar_ratio=ohmic.get("phi_bar_ratio", DEFAULT_PHI_BAR_RATIO),
                eta=eta,
            )
        except Exception as e:
            return self.error("Coupling reduction", e)

        output = f"[OK] **{model.variant.value}** at lambda = {lambda_coupling}\n\n"
        output += f"**gamma:** {format_real(model.xi)}\n"
        j = model.coupling
        if j:
            output += f"**J:** {format_real(j.real)} {'+' if j.imag >= 0 else '-'} {format_real(abs(j.imag))}i\n"
        if model.variant.is_long_range:
            output += f"**Delta F:** {format_real(model.delta_f)}\n"
            output += f"**F_bar:** {format_real(model.f_bar)}\n"
            output += f"**Phi_bar:** {format_real(model.phi_bar)}\n"
        if model.kernel_method is not None:
            output += f"**Kernel method:** {model.kernel_method.value}\n"
        return output
