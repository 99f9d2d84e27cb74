from setuptools import find_packages, setup

setup(
    name="fracmeasure",
    version="0.1.0",
    description="Spectral fractional Laplacian solvers with measure-valued data",
    packages=find_packages(exclude=("tests",)),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "pydantic>=2.0",
        "pydantic-settings>=2.0",
        "python-dotenv>=1.0",
        "openpyxl>=3.1",
    ],
    extras_require={"test": ["pytest>=7"]},
    entry_points={"console_scripts": ["fracmeasure=fracmeasure.main:main"]},
)
