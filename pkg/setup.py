from setuptools import setup
from autobid import __version__ as pkg

NAME = "autobid"
VERSION = pkg.__version__
REQUIRES = ["numpy", "oyaml", "pandas", "python-json-logger"]

setup(
    description="Second-price autobidding auctions under return-on-spend constraints",
    install_requires=REQUIRES,
    extras_require={"test": ["pytest", "pytest-mock"]},
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    keywords=["autobidding", "auctions", "equilibrium"],
    license="MIT",
    name=NAME,
    packages=["autobid", "autobid/commands", "autobid/utils"],
    entry_points={"console_scripts": ["autobid=autobid.cli:main"]},
    python_requires=">=3.8",
    version=VERSION
)
