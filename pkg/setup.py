from setuptools import find_packages, setup

setup(name="blab", packages=find_packages(exclude=("tests", "tests.*")))
