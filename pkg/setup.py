from setuptools import setup, find_packages

setup(
    name='neuralreg',
    version='0.1.0',
    packages=find_packages('src'),
    package_dir={'': 'src'},
    py_modules=['neuralreg'],
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.20',
        'pyyaml>=5.1',
        'scipy>=1.6',
        'tabulate',
        'ujson',
    ],
    entry_points={
        'console_scripts': [
            'neuralreg = neuralreg:main',
            'neuralreg-synth-data = synth.generate_scans:main',
            'neuralreg-synth-task = synth.generate_task:main',
            'neuralreg-fit-denoiser = neural.fit:main',
            'neuralreg-build-similarity = neural.build:main',
            'neuralreg-train = trainer.train:main',
            'neuralreg-eval-noise = robustness.evaluate_noise:main',
            'neuralreg-eval-adversarial = robustness.evaluate_adversarial:main',
            'neuralreg-report = report.report:main',
        ]
    }
)
