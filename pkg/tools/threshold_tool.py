"""Threshold tools: analytic critical couplings and the shipped presets."""

from analysis import critical_coupling
from constants import DEFAULT_F_BAR_RATIO, OHMIC
from experiment import list_presets, load_preset
from utils import config_section, format_real

from .base import BaseTool


class ThresholdTool(BaseTool):
    """Tool for critical couplings of the three bath regimes."""

    def critical_coupling(
        self,
        s: float,
        beta: float,
        delta: float,
        v: float = 1.0,
        omega0: float | None = None,
        f_bar_ratio: float | None = None,
    ) -> str:
        """
        Critical coupling lambda_c for a bath with exponent 0.5, 0 or -0.5.

        Args:
            s: Spectral exponent
            beta: Inverse bath temperature
            delta: Time between syndrome extractions
            v: Bath propagation speed
            omega0: Characteristic frequency (default 1)
            f_bar_ratio: F_bar / Delta F for the Ohmic bath (default from config.yaml)

        Returns:
            lambda_c, gamma_c, the kernel value and the scaling form
        """
        try:
            env = self.make_env(s=s, beta=beta, delta=delta, v=v, omega0=omega0)
            kwargs = {"evaluator": self.get_evaluator()}
            if env.s == OHMIC:
                if f_bar_ratio is None:
                    f_bar_ratio = config_section(self.config, "ohmic").get(
                        "f_bar_ratio", DEFAULT_F_BAR_RATIO
                    )
                kwargs["f_bar_ratio"] = f_bar_ratio
            result = critical_coupling(env, **kwargs)
        except Exception as e:
            return self.error("Critical coupling", e)

        output = f"[OK] **Critical coupling** (s = {env.s})\n\n"
        output += f"**lambda_c:** {format_real(result.lambda_c)}"
        output += " (scaling only)\n" if result.scaling_only else "\n"
        output += f"**gamma_c:** {format_real(result.gamma_c)}\n"
        output += f"**Kernel:** {format_real(result.kernel_value)} ({result.kernel_method.value})\n"
        output += f"**Scaling form:** {format_real(result.scaling_form)}\n"
        if result.note:
            output += f"**Note:** {result.note}\n"
        return output

    def describe_presets(self) -> str:
        """
        List the shipped run presets with their bath, model and sizes.

        Returns:
            One block per preset
        """
        names = list_presets(self.config)
        if not names:
            return "[*] **No presets found**"
        output = "[*] **Presets**\n\n"
        for name in names:
            try:
                data = load_preset(name, self.config)
            except Exception as e:
                self.logger.warning(f"Skipping preset {name}: {e}")
                continue
            env = data.get("env", {})
            output += f"**{name}**\n"
            output += f"  - variant: {data.get('variant')}\n"
            output += f"  - bath: s={env.get('s')}, beta={env.get('beta')}, Delta={env.get('delta')}\n"
            output += f"  - engine: {data.get('engine', 'auto')}\n"
            output += f"  - sizes: {data.get('sizes', [])}\n"
        return output
