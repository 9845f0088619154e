from setuptools import setup, find_packages

setup(
    name="es-verify",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={
        'es_verify.config': ['defaults.json'],
    },
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.7',
    ],
    extras_require={
        'test': ['pytest>=7'],
    },
    entry_points={
        'console_scripts': [
            'es-verify=es_verify.main:main',
        ],
    },
    python_requires='>=3.9',
)
