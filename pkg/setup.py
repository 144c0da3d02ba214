import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

requirements = ['numpy>=1.17.0', 'scipy>=1.4.0', 'pandas>=0.25.0', 'xarray>=0.14.1', 'sortedcontainers>=2.1.0',
                'PyYAML>=5.1']
classifiers = ["Programming Language :: Python :: 3", "License :: OSI Approved :: MIT License",
               "Operating System :: OS Independent"]

setuptools.setup(name='pyefc', python_requires='>=3.8', version='0.1.0',
                 install_requires=requirements, extras_require={'test': ['pytest>=5.0']},
                 long_description=long_description,
                 long_description_content_type="text/markdown",
                 packages=setuptools.find_packages(exclude=['tests', 'examples', 'examples.*']),
                 package_data={'pyefc': ['_examples/*.yaml']},
                 classifiers=classifiers,
                 entry_points={'console_scripts': ['pyefc = pyefc.__main__:main']})
