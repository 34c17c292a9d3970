def test_import() -> None:
    """Test that the code can be imported"""
    from regime_allocation import PipelineState, create_pipeline, graph  # noqa: F401
