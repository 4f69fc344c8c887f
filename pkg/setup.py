"""
Copyright 2022 NOAA
All rights reserved.

Build script; all package metadata lives in setup.cfg

"""
import setuptools
setuptools.setup()
