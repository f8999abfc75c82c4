"""
setup.py -- setup script for use of packages.
"""
from setuptools import setup, find_packages

__version__ = '0.1.0'

with open("README.md", "r") as fh:
    long_description = fh.read()

# create entry points
entry_points = {
    'console_scripts' : [
        'sagetool = sagepy.cli:cmd_tool',
     ]
}

install_requires = [
        'numpy',
        'scipy',
        'pandas',
        'matplotlib',
        'scikit-learn',
        'Pillow',
]

extras_require = {
        'test': [
            'pytest',
            'hypothesis',
            'coverage',
        ]
}

setup(name='sagepy',
      version=__version__,
      description='Latent attribute-group editing for few-shot generation, checked against a synthetic world',
      long_description=long_description,
      long_description_content_type='text/markdown',
      license='BSD',
      install_requires=install_requires,
      extras_require=extras_require,
      entry_points=entry_points,
      packages=find_packages(exclude=['tests']),
      include_package_data=True,
      zip_safe=False,
      python_requires='>=3.8',
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Environment :: Console',
          'Natural Language :: English',
          'Operating System :: POSIX :: Linux',
          'Programming Language :: Python :: 3',
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: BSD License',
          'Topic :: Scientific/Engineering :: Artificial Intelligence',
      ],
      tests_require=['pytest', 'hypothesis'],
)
