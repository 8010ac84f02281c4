# tests/test_public_api.py
"""Test public API exports."""
import netlqr


def test_version():
    """Test version is available."""
    assert hasattr(netlqr, "__version__")
    assert isinstance(netlqr.__version__, str)


def test_core_objects_exported():
    """Test core objects are exported."""
    assert hasattr(netlqr, "GraphSpec")
    assert hasattr(netlqr, "SpectralData")
    assert hasattr(netlqr, "SystemModel")
    assert hasattr(netlqr, "GainSchedule")
    assert hasattr(netlqr, "spectral_decompose")
    assert hasattr(netlqr, "decompose")
    assert hasattr(netlqr, "synthesize_finite")
    assert hasattr(netlqr, "synthesize_infinite")
    assert hasattr(netlqr, "simulate_deterministic")
    assert hasattr(netlqr, "centralized_oracle")
    assert hasattr(netlqr, "run")


def test_config_exported():
    """Test config objects are exported."""
    assert hasattr(netlqr, "ExperimentConfig")
    assert hasattr(netlqr, "SolverConfig")
    assert hasattr(netlqr, "ToleranceConfig")
    assert hasattr(netlqr, "parse_config")


def test_exceptions_exported():
    """Test exceptions are exported."""
    assert hasattr(netlqr, "NetlqrError")
    assert hasattr(netlqr, "ModelError")
    assert hasattr(netlqr, "NumericalError")
    assert hasattr(netlqr, "ParseError")
    assert hasattr(netlqr, "ValidationError")
    assert hasattr(netlqr, "VerificationError")


def test_all_exports():
    """Test __all__ contains expected exports."""
    expected = {
        "GraphSpec", "SpectralData", "SystemModel", "GainSchedule",
        "spectral_decompose", "decompose", "synthesize_finite", "synthesize_infinite",
        "simulate_deterministic", "centralized_oracle", "run",
        "ExperimentConfig", "SolverConfig", "ToleranceConfig", "parse_config",
        "NetlqrError", "ModelError", "NumericalError", "ParseError",
        "ValidationError", "VerificationError",
        "__version__",
    }
    assert set(netlqr.__all__) == expected
