from setuptools import find_packages, setup

setup(
    name="feedbackgain",
    version="0.1.0",
    description="Zero-rate AWGN transmission with noisy passive feedback",
    packages=find_packages(include=["src", "src.*"]),
    python_requires=">=3.10",
    install_requires=[
        "click",
        "numpy",
        "pandas",
        "pydantic>=2",
        "scipy",
        "toml",
    ],
    entry_points={"console_scripts": ["feedbackgain=src.harness.cli:main"]},
)
