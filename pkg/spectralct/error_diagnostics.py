"""
Error types and troubleshooting utilities for spectralct
Provides exit codes, diagnoses and resolution steps for common failures.
"""

from typing import Dict, List, Optional


class SpectralCTError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class ConfigError(SpectralCTError):
    """Invalid or inconsistent run configuration."""

    exit_code = 2


class MissingInputError(SpectralCTError):
    """A required artifact (sinogram, dictionary, truth) is not on disk."""

    exit_code = 3


class NumericalError(SpectralCTError):
    """A solver produced non-finite values or could not proceed."""

    exit_code = 4


class DimensionError(SpectralCTError, ValueError):
    """Array shapes do not agree; the message always carries the dims."""

    exit_code = 2


class ErrorDiagnostics:
    """Utility class for diagnosing and providing solutions for common errors"""

    ERROR_SOLUTIONS = {
        "config_schema": {
            "title": "⚙️ Run Configuration Error",
            "description": "The TOML run configuration failed schema validation",
            "solutions": [
                "1. Check the key names against the grammar in README.md (unknown keys are rejected)",
                "2. Make sure numeric blocks use numbers, not quoted strings",
                "3. Use a preset name from `sctl presets` in the [recon] block",
            ],
        },
        "atom_count": {
            "title": "🧩 Dictionary Size Error",
            "description": "The atom count must exceed the patch dimension N x N x S",
            "solutions": [
                "1. Increase [dictionary].atom_count",
                "2. Reduce [dictionary].patch_size",
                "3. Use fewer energy channels",
            ],
        },
        "missing_input": {
            "title": "📂 Missing Input Error",
            "description": "A required tensor file is not where the command expects it",
            "solutions": [
                "1. Run `sctl simulate` first to produce truth/sinogram tensors",
                "2. Run `sctl train-dict` before `reconstruct --method tdl|l0tdl`",
                "3. Pass the explicit file with --sino / --dict / --truth",
            ],
        },
        "dimension": {
            "title": "📐 Dimension Mismatch",
            "description": "Two tensors or a tensor and the geometry disagree in shape",
            "solutions": [
                "1. Reconstruct and evaluate with the same [geometry] block",
                "2. Check the number of views used for subsampling",
                "3. Regenerate artifacts after changing image_size or detector_count",
            ],
        },
        "non_finite": {
            "title": "🔢 Numerical Failure",
            "description": "A solver produced NaN or infinite values",
            "solutions": [
                "1. Lower sigma/eta (regularization weights)",
                "2. Check the photon count; very low doses give huge log projections",
                "3. Verify the geometry covers the phantom support",
            ],
        },
    }

    @classmethod
    def diagnose_error(cls, error_message: str, error_type: str = None) -> Optional[Dict]:
        """
        Diagnose an error and provide solutions

        Args:
            error_message: The error message string
            error_type: Optional error class name

        Returns:
            Dict with diagnosis information or None if no match found
        """
        error_lower = error_message.lower()

        if "atom count" in error_lower or "k >" in error_lower:
            return cls.ERROR_SOLUTIONS["atom_count"]
        elif error_type == "ConfigError" or "validation error" in error_lower:
            return cls.ERROR_SOLUTIONS["config_schema"]
        elif error_type == "MissingInputError" or "not found" in error_lower:
            return cls.ERROR_SOLUTIONS["missing_input"]
        elif error_type == "DimensionError" or "mismatch" in error_lower:
            return cls.ERROR_SOLUTIONS["dimension"]
        elif "nan" in error_lower or "finite" in error_lower:
            return cls.ERROR_SOLUTIONS["non_finite"]

        return None

    @classmethod
    def generate_error_report(cls, error_message: str, error_type: str = None,
                              command: str = None, context: Dict = None) -> str:
        """
        Generate an error report with solutions

        Args:
            error_message: The error message
            error_type: Error class name
            command: Name of the CLI command that failed
            context: Additional context information

        Returns:
            Formatted error report string
        """
        diagnosis = cls.diagnose_error(error_message, error_type)

        report = []
        report.append("=" * 60)
        report.append("🚨 SPECTRALCT ERROR REPORT")
        report.append("=" * 60)

        if command:
            report.append(f"🔧 Failed Command: {command}")
        if error_type:
            report.append(f"⚠️ Error Type: {error_type}")

        report.append(f"📝 Error Message: {error_message}")
        report.append("")

        if diagnosis:
            report.append(diagnosis["title"])
            report.append("-" * len(diagnosis["title"]))
            report.append(diagnosis["description"])
            report.append("")

            report.append("💡 RECOMMENDED SOLUTIONS:")
            for solution in diagnosis["solutions"]:
                report.append(f"   {solution}")
            report.append("")

        if context:
            report.append("📊 ERROR CONTEXT:")
            for key, value in context.items():
                report.append(f"   {key}: {value}")
            report.append("")

        report.append("=" * 60)

        return "\n".join(report)

    @classmethod
    def check_configuration(cls, run_config) -> List[Dict]:
        """
        Check a validated run configuration for soft problems

        Returns:
            List of configuration issues (empty when nothing looks off)
        """
        issues = []

        geometry = run_config.geometry
        if not geometry.covers_image():
            issues.append({
                "type": "geometry",
                "severity": "low",
                "message": "The fan does not cover the image corners",
                "solution": "Keep the phantom inside the inscribed circle or widen the detector",
            })

        if run_config.views is not None and run_config.views > geometry.view_count:
            issues.append({
                "type": "views",
                "severity": "high",
                "message": f"views={run_config.views} exceeds the {geometry.view_count} acquired views",
                "solution": "Lower `views` in the run configuration",
            })

        return issues


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(error, SpectralCTError):
        return error.exit_code
    if isinstance(error, FileNotFoundError):
        return MissingInputError.exit_code
    if isinstance(error, (FloatingPointError, ArithmeticError)):
        return NumericalError.exit_code
    if isinstance(error, ValueError):
        return ConfigError.exit_code
    return 1
