from importlib import resources


def sample_checkins_path():
    """Path to the bundled 200-event sample check-in log."""
    return resources.files(__name__).joinpath("sample_checkins.tsv")
