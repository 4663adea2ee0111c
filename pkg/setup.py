'''
Setup
'''
from setuptools import setup


if __name__ == '__main__':
    setup(setup_requires=['pbr'], pbr=True,
          keywords='dmc channel quantization mutual information ldpc density evolution')
