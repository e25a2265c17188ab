from setuptools import setup, find_packages

setup(
    name="simonslab",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "PyYAML>=6.0",
    ],
    extras_require={
        "test": [
            "pytest>=7.0",
            "hypothesis>=6.0",
        ],
    },
    entry_points={
        'console_scripts': [
            'simonslab=simonslab.main:main',
        ],
    },
    description="Numerical verification lab for nonlocal Simons-type identities",
    author="SimonsLab Team",
    author_email="example@example.com",
    url="https://github.com/example/simonslab",
)
