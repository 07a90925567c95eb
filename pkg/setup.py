from setuptools import setup, find_packages


with open("README.md", "r") as f:
    long_description = f.read()

setup(
    name='esac',
    version='0.3.0',
    license='MIT',

    author='Martin Chatterjee',
    author_email='martin@chatterjee.de',

    description=('Sparsity adaptive multiple changepoint detection for '
                 'high-dimensional data sequences'),
    long_description=long_description,
    long_description_content_type='text/markdown',

    packages=find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*']),
    install_requires=[
        'numpy >= 1.17',
        'scipy >= 1.5',
        'pandas >= 1.0',
        'coverage >= 4.5',
    ],

    classifiers=[
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: MIT License',
        'Intended Audience :: Science/Research',
        'Operating System :: Microsoft :: Windows',
        'Operating System :: POSIX :: Linux',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    keywords=('changepoint detection cusum high-dimensional time series '
              'seeded binary segmentation narrowest over threshold'),

    python_requires='>=3.8, <4',
    entry_points={
        "console_scripts": [
            "esac=esac.cli:main",
        ]
    },
)
