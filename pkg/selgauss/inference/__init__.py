"""Maximum likelihood inference of prior parameters"""
